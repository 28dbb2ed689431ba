//! Spectral differentiation on a uniform periodic phase grid.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Fourier differentiation matrix for `n` equispaced points on `[0, 2pi)`.
///
/// `D[j][k] = (-1)^(j-k) cot((j-k) h / 2) / 2` with `h = 2pi/n`. Entries are
/// built from the index offset so that the matrix is exactly antisymmetric
/// and its rows sum to zero in floating point.
pub fn fourier_diff_matrix(n: usize) -> Result<DMatrix<f64>> {
    if n % 2 != 0 || n < 8 {
        return Err(Error::InvalidArgument(format!(
            "phase grid size must be even and at least 8, got {n}"
        )));
    }
    let h = 2.0 * PI / n as f64;
    let mut by_offset = vec![0.0; n];
    for m in 1..n / 2 {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        by_offset[m] = 0.5 * sign / (m as f64 * h / 2.0).tan();
        by_offset[n - m] = -by_offset[m];
    }
    Ok(DMatrix::from_fn(n, n, |j, k| by_offset[(j + n - k) % n]))
}

/// Uniform grid of microwave phases with its differentiation matrix.
#[derive(Debug, Clone)]
pub struct PhaseGrid {
    pub phases: Vec<f64>,
    pub diff_matrix: DMatrix<f64>,
}

impl PhaseGrid {
    pub fn new(n: usize) -> Result<Self> {
        let diff_matrix = fourier_diff_matrix(n)?;
        let phases = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        Ok(Self {
            phases,
            diff_matrix,
        })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}
