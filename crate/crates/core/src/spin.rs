//! Spin-1/2 operator algebra and Liouville-space plumbing.
//!
//! Operators are dense complex matrices on the product Hilbert space with
//! spin 0 as the leftmost Kronecker factor. Superoperators act on
//! column-stacked operator vectors, so `vec(A X B) = (B^T (x) A) vec(X)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::constants::{BOLTZMANN, HBAR};
use crate::error::{Error, Result};

pub type C64 = Complex64;
/// Dense operator on the spin Hilbert space.
pub type Operator = DMatrix<C64>;
/// Dense operator on Liouville space (column-stacking convention).
pub type Superoperator = DMatrix<C64>;

pub const MAX_SPINS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpinKind {
    Electron,
    Nucleus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinLabel {
    pub index: usize,
    pub kind: SpinKind,
}

impl SpinLabel {
    pub fn electron(index: usize) -> Self {
        Self {
            index,
            kind: SpinKind::Electron,
        }
    }

    pub fn nucleus(index: usize) -> Self {
        Self {
            index,
            kind: SpinKind::Nucleus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

impl Axis {
    fn from_char(c: char) -> Option<Self> {
        match c {
            'x' | 'X' => Some(Axis::X),
            'y' | 'Y' => Some(Axis::Y),
            'z' | 'Z' => Some(Axis::Z),
            '+' => Some(Axis::Plus),
            '-' => Some(Axis::Minus),
            _ => None,
        }
    }
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn single_spin_matrix(axis: Axis) -> Operator {
    let z = C64::new(0.0, 0.0);
    let half = c(0.5);
    let ih = C64::new(0.0, 0.5);
    let one = c(1.0);
    let entries = match axis {
        Axis::X => [z, half, half, z],
        Axis::Y => [z, ih, -ih, z],
        Axis::Z => [half, z, z, -half],
        Axis::Plus => [z, z, one, z],
        Axis::Minus => [z, one, z, z],
    };
    // column-major: [m00, m10, m01, m11]
    DMatrix::from_column_slice(2, 2, &entries)
}

pub fn identity(dim: usize) -> Operator {
    DMatrix::identity(dim, dim)
}

/// Embeds a single-spin operator into the `n_spins`-spin Hilbert space.
pub fn single_spin_operator(n_spins: usize, target: SpinLabel, axis: Axis) -> Result<Operator> {
    if n_spins == 0 || n_spins > MAX_SPINS || target.index >= n_spins {
        return Err(Error::IndexOutOfRange {
            index: target.index,
            n_spins,
        });
    }
    let mut op = DMatrix::from_element(1, 1, c(1.0));
    for k in 0..n_spins {
        let factor = if k == target.index {
            single_spin_matrix(axis)
        } else {
            identity(2)
        };
        op = op.kronecker(&factor);
    }
    Ok(op)
}

/// Cartesian spin vector `[Sx, Sy, Sz]` of one spin.
pub fn spin_vector(n_spins: usize, index: usize) -> Result<[Operator; 3]> {
    let label = SpinLabel {
        index,
        kind: SpinKind::Electron,
    };
    Ok([
        single_spin_operator(n_spins, label, Axis::X)?,
        single_spin_operator(n_spins, label, Axis::Y)?,
        single_spin_operator(n_spins, label, Axis::Z)?,
    ])
}

/// Column-stacked vectorisation.
pub fn vectorize(op: &Operator) -> DVector<C64> {
    DVector::from_column_slice(op.as_slice())
}

pub fn unvectorize(v: &DVector<C64>) -> Result<Operator> {
    let dim = (v.len() as f64).sqrt().round() as usize;
    if dim * dim != v.len() {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            found: v.len(),
        });
    }
    Ok(DMatrix::from_column_slice(dim, dim, v.as_slice()))
}

fn require_square(op: &Operator) -> Result<usize> {
    if op.nrows() != op.ncols() {
        return Err(Error::DimensionMismatch {
            expected: op.nrows(),
            found: op.ncols(),
        });
    }
    Ok(op.nrows())
}

/// Superoperator of `X -> A X`.
pub fn left_superoperator(a: &Operator) -> Result<Superoperator> {
    let d = require_square(a)?;
    Ok(identity(d).kronecker(a))
}

/// Superoperator of `X -> X B`.
pub fn right_superoperator(b: &Operator) -> Result<Superoperator> {
    let d = require_square(b)?;
    Ok(b.transpose().kronecker(&identity(d)))
}

/// Superoperator of `X -> H X - X H`.
pub fn commutation_superoperator(h: &Operator) -> Result<Superoperator> {
    Ok(left_superoperator(h)? - right_superoperator(h)?)
}

pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

pub fn trace(op: &Operator) -> C64 {
    op.diagonal().sum()
}

pub fn frobenius_norm(op: &Operator) -> f64 {
    op.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Relative anti-Hermitian content `||A - A^dag|| / ||A||` (zero for the zero matrix).
pub fn hermiticity_defect(op: &Operator) -> f64 {
    let norm = frobenius_norm(op);
    if norm == 0.0 {
        return 0.0;
    }
    frobenius_norm(&(op - op.adjoint())) / norm
}

/// Thermal equilibrium `exp(-hbar H0 / kT) / Z` for a Hamiltonian in rad/s.
///
/// Infinite temperature yields the maximally mixed state.
pub fn thermal_state(h0: &Operator, temperature: f64) -> Result<Operator> {
    let dim = require_square(h0)?;
    if !(temperature > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let beta = HBAR / (BOLTZMANN * temperature);
    let eig = h0.clone().symmetric_eigen();
    let lowest = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&e| (-beta * (e - lowest)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let mut rho = DMatrix::zeros(dim, dim);
    for (k, w) in weights.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        rho += (v * v.adjoint()) * c(w / z);
    }
    // restore exact Hermiticity lost to round-off
    Ok((&rho + rho.adjoint()) * c(0.5))
}

/// `Re Tr[rho obs]`, checking that the imaginary part is negligible.
pub fn expectation(rho: &Operator, obs: &Operator) -> Result<f64> {
    if rho.shape() != obs.shape() {
        return Err(Error::DimensionMismatch {
            expected: rho.nrows(),
            found: obs.nrows(),
        });
    }
    let value = trace(&(rho * obs));
    let scale = value.re.abs().max(1e-300) + frobenius_norm(rho) * frobenius_norm(obs) * 1e-14;
    debug_assert!(
        value.im.abs() <= 1e-10 * scale.max(value.re.abs()) || value.im.abs() < 1e-15,
        "non-Hermitian expectation value {value}"
    );
    Ok(value.re)
}

/// Polarisation of a spin-1/2 observable, `2 <Sz>`.
pub fn polarization(rho: &Operator, sz: &Operator) -> Result<f64> {
    Ok(2.0 * expectation(rho, sz)?)
}

/// Steady-state amplitude `|<O/||O|| | rho>|` with `rho` scaled to have unit
/// projection on the normalised identity, i.e. `sqrt(dim) |Tr[rho O]| / ||O||`.
///
/// For a single-spin `Sz` this equals the polarisation `2<Sz>`.
pub fn amplitude(rho: &Operator, op: &Operator) -> Result<f64> {
    if rho.shape() != op.shape() {
        return Err(Error::DimensionMismatch {
            expected: rho.nrows(),
            found: op.nrows(),
        });
    }
    let norm = frobenius_norm(op);
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let dim = rho.nrows() as f64;
    Ok(dim.sqrt() * trace(&(rho * op)).norm() / norm)
}

/// Product operators written in the notation `E+1-2E+1Ez2`, `4Ez1Ez2Nz`,
/// `2EzNz` (electron index defaults to 1). Coefficients are integers.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductOperator {
    pub name: String,
    terms: Vec<(f64, Vec<(usize, Axis)>)>,
}

impl ProductOperator {
    pub fn parse(text: &str, n_electrons: usize) -> Result<Self> {
        let err = || Error::OperatorSyntax(text.to_string());
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        if chars.is_empty() {
            return Err(err());
        }
        let nucleus = n_electrons;
        let mut terms = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let mut sign = 1.0;
            if chars[i] == '+' || chars[i] == '-' {
                if chars[i] == '-' {
                    sign = -1.0;
                }
                i += 1;
            } else if !terms.is_empty() {
                return Err(err());
            }
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let coefficient = if i > start {
                chars[start..i]
                    .iter()
                    .collect::<String>()
                    .parse::<f64>()
                    .map_err(|_| err())?
            } else {
                1.0
            };
            let mut factors = Vec::new();
            while i < chars.len() && (chars[i] == 'E' || chars[i] == 'N') {
                let particle = chars[i];
                let axis = chars
                    .get(i + 1)
                    .and_then(|&c| Axis::from_char(c))
                    .ok_or_else(err)?;
                i += 2;
                let spin = if particle == 'N' {
                    nucleus
                } else if i < chars.len() && chars[i].is_ascii_digit() {
                    let k = chars[i].to_digit(10).unwrap() as usize;
                    i += 1;
                    if k == 0 || k > n_electrons {
                        return Err(err());
                    }
                    k - 1
                } else {
                    0
                };
                if factors.iter().any(|&(s, _)| s == spin) {
                    return Err(err());
                }
                factors.push((spin, axis));
            }
            if factors.is_empty() {
                return Err(err());
            }
            terms.push((sign * coefficient, factors));
        }
        Ok(Self {
            name: text.to_string(),
            terms,
        })
    }

    pub fn operator(&self, n_spins: usize) -> Result<Operator> {
        let dim = 1 << n_spins;
        let mut total = DMatrix::zeros(dim, dim);
        for (coefficient, factors) in &self.terms {
            let mut term = identity(dim);
            for &(spin, axis) in factors {
                term *= single_spin_operator(n_spins, SpinLabel::electron(spin), axis)?;
            }
            total += term * c(*coefficient);
        }
        Ok(total)
    }
}
