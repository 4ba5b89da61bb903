//! Symmetric block-tridiagonal systems, optionally closed cyclically.
//!
//! Factorization is block `L D L^T` without pivoting across blocks; each pivot
//! block is diagonalized, which gives the inertia of the whole matrix by
//! Sylvester's law. The cyclic case is handled by bordering the last block.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts of negative, (numerically) zero and positive eigenvalues.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

impl Inertia {
    fn add(&mut self, other: Inertia) {
        self.negative += other.negative;
        self.zero += other.zero;
        self.positive += other.positive;
    }

    pub fn is_negative_definite(&self) -> bool {
        self.zero == 0 && self.positive == 0
    }

    pub fn is_negative_semidefinite(&self) -> bool {
        self.positive == 0
    }
}

/// Symmetric matrix made of square `b x b` blocks on three block diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonal {
    /// Diagonal blocks `H[k][k]`.
    pub diag: Vec<DMatrix<f64>>,
    /// Sub-diagonal blocks, `lower[k] = H[k + 1][k]`.
    pub lower: Vec<DMatrix<f64>>,
    /// Cyclic closure `H[M - 1][0]`, present for periodic problems.
    pub corner: Option<DMatrix<f64>>,
}

impl BlockTridiagonal {
    pub fn zeros(blocks: usize, block_size: usize, cyclic: bool) -> Self {
        let z = DMatrix::zeros(block_size, block_size);
        Self {
            diag: vec![z.clone(); blocks],
            lower: vec![z.clone(); blocks.saturating_sub(1)],
            corner: cyclic.then_some(z),
        }
    }

    pub fn blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn block_size(&self) -> usize {
        self.diag[0].nrows()
    }

    pub fn dim(&self) -> usize {
        self.blocks() * self.block_size()
    }

    pub fn is_cyclic(&self) -> bool {
        self.corner.is_some()
    }

    /// Block `(i, j)` for `|i - j| <= 1` or the cyclic corner.
    pub fn block(&self, i: usize, j: usize) -> Option<DMatrix<f64>> {
        let m = self.blocks();
        if i == j {
            Some(self.diag[i].clone())
        } else if i == j + 1 {
            Some(self.lower[j].clone())
        } else if j == i + 1 {
            Some(self.lower[i].transpose())
        } else if let Some(c) = &self.corner {
            if i == m - 1 && j == 0 {
                Some(c.clone())
            } else if i == 0 && j == m - 1 {
                Some(c.transpose())
            } else {
                None
            }
        } else {
            None
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let (m, b) = (self.blocks(), self.block_size());
        let mut out = DMatrix::zeros(m * b, m * b);
        for i in 0..m {
            for j in 0..m {
                if let Some(blk) = self.block(i, j) {
                    out.view_mut((i * b, j * b), (b, b)).copy_from(&blk);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let (m, b) = (self.blocks(), self.block_size());
        let mut y = DVector::zeros(m * b);
        for k in 0..m {
            let xk = x.rows(k * b, b);
            let mut yk = &self.diag[k] * xk;
            if k > 0 {
                yk += &self.lower[k - 1] * x.rows((k - 1) * b, b);
            }
            if k + 1 < m {
                yk += self.lower[k].tr_mul(&x.rows((k + 1) * b, b));
            }
            y.rows_mut(k * b, b).copy_from(&yk);
        }
        if let Some(c) = &self.corner {
            let first = c.tr_mul(&x.rows((m - 1) * b, b));
            let last = c * x.rows(0, b);
            let mut y0 = y.rows_mut(0, b);
            y0 += first;
            let mut yl = y.rows_mut((m - 1) * b, b);
            yl += last;
        }
        y
    }

    /// Largest absolute row sum, used as the scale for singularity tests.
    pub fn norm_inf(&self) -> f64 {
        let (m, b) = (self.blocks(), self.block_size());
        let mut worst = 0.0_f64;
        for k in 0..m {
            for r in 0..b {
                let mut s = self.diag[k].row(r).iter().map(|v| v.abs()).sum::<f64>();
                if k > 0 {
                    s += self.lower[k - 1].row(r).iter().map(|v| v.abs()).sum::<f64>();
                }
                if k + 1 < m {
                    s += self.lower[k].column(r).iter().map(|v| v.abs()).sum::<f64>();
                }
                if let Some(c) = &self.corner {
                    if k == 0 {
                        s += c.column(r).iter().map(|v| v.abs()).sum::<f64>();
                    }
                    if k == m - 1 {
                        s += c.row(r).iter().map(|v| v.abs()).sum::<f64>();
                    }
                }
                worst = worst.max(s);
            }
        }
        worst
    }

    /// Returns `self - shift * I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for d in &mut out.diag {
            for i in 0..d.nrows() {
                d[(i, i)] -= shift;
            }
        }
        out
    }

    pub fn factor(&self) -> Result<BlockFactor> {
        let scale = self.norm_inf().max(f64::MIN_POSITIVE);
        match &self.corner {
            None => {
                let chain = ChainFactor::new(&self.diag, &self.lower, scale, 0)?;
                let inertia = chain.inertia;
                Ok(BlockFactor {
                    chain,
                    border: None,
                    inertia,
                })
            }
            Some(corner) => {
                let m = self.blocks();
                if m < 3 {
                    return Err(Error::InvalidParameter(
                        "cyclic systems need at least three blocks".into(),
                    ));
                }
                let chain = ChainFactor::new(&self.diag[..m - 1], &self.lower[..m - 2], scale, 0)?;
                let b = self.block_size();
                // Coupling of the interior chain to the last block.
                let mut coupling = vec![DMatrix::zeros(b, b); m - 1];
                coupling[0] = corner.transpose();
                coupling[m - 2] += self.lower[m - 2].transpose();
                let z = chain.solve_blocks(coupling);
                let schur = &self.diag[m - 1] - corner * &z[0] - &self.lower[m - 2] * &z[m - 2];
                let schur = Pivot::new(schur, scale, m - 1)?;
                let mut inertia = chain.inertia;
                inertia.add(schur.inertia);
                Ok(BlockFactor {
                    chain,
                    border: Some(Border {
                        z,
                        corner: corner.clone(),
                        last_lower: self.lower[m - 2].clone(),
                        schur,
                    }),
                    inertia,
                })
            }
        }
    }
}

const SINGULAR_TOL: f64 = 1e-14;
const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Pivot {
    inverse: DMatrix<f64>,
    inertia: Inertia,
}

impl Pivot {
    fn new(block: DMatrix<f64>, scale: f64, index: usize) -> Result<Self> {
        let sym = (&block + block.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut inertia = Inertia::default();
        for &ev in eig.eigenvalues.iter() {
            if !ev.is_finite() {
                return Err(Error::SingularSystem { block: index });
            }
            if ev.abs() <= ZERO_TOL * scale {
                inertia.zero += 1;
            } else if ev < 0.0 {
                inertia.negative += 1;
            } else {
                inertia.positive += 1;
            }
            if ev.abs() <= SINGULAR_TOL * scale {
                return Err(Error::SingularSystem { block: index });
            }
        }
        let q = &eig.eigenvectors;
        let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v));
        let inverse = q * inv_diag * q.transpose();
        Ok(Self { inverse, inertia })
    }
}

/// Block `L D L^T` of a non-cyclic block-tridiagonal matrix.
#[derive(Debug, Clone)]
struct ChainFactor {
    pivots: Vec<Pivot>,
    lower: Vec<DMatrix<f64>>,
    inertia: Inertia,
}

impl ChainFactor {
    fn new(diag: &[DMatrix<f64>], lower: &[DMatrix<f64>], scale: f64, offset: usize) -> Result<Self> {
        let mut pivots: Vec<Pivot> = Vec::with_capacity(diag.len());
        let mut inertia = Inertia::default();
        for k in 0..diag.len() {
            let block = if k == 0 {
                diag[0].clone()
            } else {
                let l = &lower[k - 1];
                &diag[k] - l * &pivots[k - 1].inverse * l.transpose()
            };
            let p = Pivot::new(block, scale, offset + k)?;
            inertia.add(p.inertia);
            pivots.push(p);
        }
        Ok(Self {
            pivots,
            lower: lower.to_vec(),
            inertia,
        })
    }

    fn solve_blocks(&self, mut rhs: Vec<DMatrix<f64>>) -> Vec<DMatrix<f64>> {
        let m = self.pivots.len();
        for k in 1..m {
            let update = &self.lower[k - 1] * (&self.pivots[k - 1].inverse * &rhs[k - 1]);
            rhs[k] -= update;
        }
        rhs[m - 1] = &self.pivots[m - 1].inverse * &rhs[m - 1];
        for k in (0..m - 1).rev() {
            let y = &rhs[k] - self.lower[k].tr_mul(&rhs[k + 1]);
            rhs[k] = &self.pivots[k].inverse * y;
        }
        rhs
    }
}

#[derive(Debug, Clone)]
struct Border {
    z: Vec<DMatrix<f64>>,
    corner: DMatrix<f64>,
    last_lower: DMatrix<f64>,
    schur: Pivot,
}

/// Factorization produced by [`BlockTridiagonal::factor`].
#[derive(Debug, Clone)]
pub struct BlockFactor {
    chain: ChainFactor,
    border: Option<Border>,
    inertia: Inertia,
}

impl BlockFactor {
    pub fn inertia(&self) -> Inertia {
        self.inertia
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let b = self.chain.pivots[0].inverse.nrows();
        let split = |v: &DVector<f64>, count: usize| -> Vec<DMatrix<f64>> {
            (0..count).map(|k| DMatrix::from_column_slice(b, 1, v.rows(k * b, b).as_slice())).collect()
        };
        match &self.border {
            None => {
                let m = self.chain.pivots.len();
                let x = self.chain.solve_blocks(split(rhs, m));
                DVector::from_iterator(m * b, x.iter().flat_map(|blk| blk.iter().copied()))
            }
            Some(border) => {
                let m = self.chain.pivots.len() + 1;
                let y = self.chain.solve_blocks(split(rhs, m - 1));
                let r_last = rhs.rows((m - 1) * b, b).clone_owned();
                let coupled = &border.corner * &y[0] + &border.last_lower * &y[m - 2];
                let x_last = &border.schur.inverse * (r_last - coupled.column(0));
                let mut out = DVector::zeros(m * b);
                for k in 0..m - 1 {
                    let xk = y[k].column(0) - &border.z[k] * &x_last;
                    out.rows_mut(k * b, b).copy_from(&xk);
                }
                out.rows_mut((m - 1) * b, b).copy_from(&x_last);
                out
            }
        }
    }
}
