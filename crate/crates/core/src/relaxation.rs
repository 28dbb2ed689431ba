//! Bloch-Redfield-Wangsness relaxation superoperator for isotropic rotational
//! diffusion, with every auto- and cross-correlation between the anisotropic
//! interactions retained.
//!
//! Each anisotropic coupling is expanded over a real orthonormal basis of
//! symmetric traceless 3x3 matrices. Isotropic rotational diffusion mixes the
//! five components of every rank-2 tensor with a common exponential
//! correlation function, so the correlation of interactions `a` and `b` is
//! `(A2:B2)/5 exp(-t/tau_c)` for each component.

use nalgebra::{DVector, Matrix3};

use crate::error::{Error, Result};
use crate::hamiltonian::static_hamiltonian;
use crate::spin::{
    c, commutation_superoperator, frobenius_norm, spin_vector, vectorize, Operator, Superoperator,
    C64,
};
use crate::system::{Interaction, InteractionKind, Partner, SpinSystem};

/// Relative size of the antisymmetric part above which a tensor is rejected.
const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// `J(w) = tau_c / (1 + w^2 tau_c^2)`, seconds.
pub fn spectral_density(omega: f64, tau_c: f64) -> f64 {
    tau_c / (1.0 + omega * omega * tau_c * tau_c)
}

/// Real orthonormal basis of symmetric traceless 3x3 matrices.
pub fn rank2_basis() -> [Matrix3<f64>; 5] {
    let s2 = std::f64::consts::SQRT_2;
    let s6 = 6f64.sqrt();
    [
        Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0) / s2,
        Matrix3::new(-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0) / s6,
        Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0) / s2,
        Matrix3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0) / s2,
        Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0) / s2,
    ]
}

/// Isotropic, antisymmetric and symmetric traceless parts of a coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank2Decomposition {
    pub kind: InteractionKind,
    /// One third of the trace, rad/s.
    pub isotropic: f64,
    /// Coefficients over [`rank2_basis`], rad/s.
    pub components: [f64; 5],
}

impl Rank2Decomposition {
    /// Decomposes the coupling tensor of `interaction` at field `b0`.
    pub fn new(interaction: &Interaction, b0: f64) -> Result<Self> {
        let t = interaction.tensor_at_field(b0);
        let antisymmetric = (t - t.transpose()).norm() / 2.0;
        if antisymmetric > SYMMETRY_TOLERANCE * t.norm().max(f64::MIN_POSITIVE) {
            return Err(Error::AsymmetricTensor(antisymmetric));
        }
        let basis = rank2_basis();
        let sym = (t + t.transpose()) / 2.0;
        let mut components = [0.0; 5];
        for (q, e) in basis.iter().enumerate() {
            components[q] = sym.component_mul(e).sum();
        }
        Ok(Self {
            kind: interaction.kind,
            isotropic: t.trace() / 3.0,
            components,
        })
    }

    /// Symmetric traceless part rebuilt from the five components.
    pub fn anisotropic_tensor(&self) -> Matrix3<f64> {
        rank2_basis()
            .iter()
            .zip(self.components)
            .map(|(e, a)| e * a)
            .sum()
    }

    /// Squared Frobenius norm of the anisotropic part.
    pub fn norm_squared(&self) -> f64 {
        self.components.iter().map(|a| a * a).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|&a| a == 0.0)
    }
}

/// Spin operators `sum_ij E_ij L_i R_j` for each rank-2 basis matrix `E`.
fn rank2_spin_operators(n_spins: usize, interaction: &Interaction) -> Result<[Operator; 5]> {
    let left = spin_vector(n_spins, interaction.spin)?;
    let dim = left[0].nrows();
    let right: Option<[Operator; 3]> = match interaction.partner {
        Partner::Field => None,
        Partner::Spin(j) => Some(spin_vector(n_spins, j)?),
    };
    let basis = rank2_basis();
    let mut out: [Operator; 5] = std::array::from_fn(|_| Operator::zeros(dim, dim));
    for (q, e) in basis.iter().enumerate() {
        for i in 0..3 {
            match &right {
                // the field is along z
                None => {
                    if e[(i, 2)] != 0.0 {
                        out[q] += &left[i] * c(e[(i, 2)]);
                    }
                }
                Some(r) => {
                    for j in 0..3 {
                        if e[(i, j)] != 0.0 {
                            out[q] += (&left[i] * &r[j]) * c(e[(i, j)]);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RelaxationSuperoperator {
    /// Column-stacked Liouville-space matrix, 1/s.
    pub matrix: Superoperator,
    pub tau_c: f64,
    pub b0: f64,
}

/// Redfield superoperator for the given anisotropic interactions, computed in
/// the eigenbasis of `h0`. Dynamic frequency shifts are dropped.
pub fn redfield_superoperator(
    n_spins: usize,
    interactions: &[Interaction],
    h0: &Operator,
    b0: f64,
    tau_c: f64,
) -> Result<Superoperator> {
    let dim = h0.nrows();
    let ldim = dim * dim;
    let decompositions: Vec<Rank2Decomposition> = interactions
        .iter()
        .map(|i| Rank2Decomposition::new(i, b0))
        .collect::<Result<_>>()?;
    let active: Vec<usize> = (0..interactions.len())
        .filter(|&k| !decompositions[k].is_zero())
        .collect();
    let mut r = Superoperator::zeros(ldim, ldim);
    if active.is_empty() {
        return Ok(r);
    }

    let eigen = h0.clone().symmetric_eigen();
    let v = eigen.eigenvectors;
    let v_adj = v.adjoint();
    let lambda = eigen.eigenvalues;
    let filter = Operator::from_fn(dim, dim, |m, n| {
        c(spectral_density(lambda[m] - lambda[n], tau_c))
    });

    let spin_ops: Vec<[Operator; 5]> = active
        .iter()
        .map(|&k| rank2_spin_operators(n_spins, &interactions[k]))
        .collect::<Result<_>>()?;
    // filtered operators V (J o V^+ T V) V^+
    let filtered: Vec<[Operator; 5]> = spin_ops
        .iter()
        .map(|ops| {
            std::array::from_fn(|q| &v * (&v_adj * &ops[q] * &v).component_mul(&filter) * &v_adj)
        })
        .collect();

    let coupling = |a: usize, b: usize| -> f64 {
        let da = &decompositions[active[a]];
        let db = &decompositions[active[b]];
        da.components
            .iter()
            .zip(db.components)
            .map(|(x, y)| x * y)
            .sum::<f64>()
            / 5.0
    };

    for q in 0..5 {
        for a in 0..active.len() {
            let mut partner = Operator::zeros(dim, dim);
            for b in 0..active.len() {
                let w = coupling(a, b);
                if w != 0.0 {
                    partner += &filtered[b][q] * c(w);
                }
            }
            r -= commutation_superoperator(&spin_ops[a][q])? * commutation_superoperator(&partner)?;
        }
    }
    // the anti-Hermitian remainder holds the dynamic frequency shifts and
    // the non-secular imbalance of the J arguments
    let adjoint = r.adjoint();
    r = (r + adjoint) * c(0.5);
    Ok(r)
}

/// Laboratory-frame relaxation superoperator of `sys` at field `b0`.
pub fn brw_superoperator(sys: &SpinSystem, b0: f64) -> Result<RelaxationSuperoperator> {
    let interactions = sys.interactions()?;
    let h0 = static_hamiltonian(sys, b0)?;
    let matrix = redfield_superoperator(sys.n_spins(), &interactions, &h0, b0, sys.tau_c)?;
    Ok(RelaxationSuperoperator {
        matrix,
        tau_c: sys.tau_c,
        b0,
    })
}

/// `Re <to| R |from>` with both operators normalised to unit Frobenius norm, 1/s.
pub fn rate_between(r: &RelaxationSuperoperator, from: &Operator, to: &Operator) -> Result<f64> {
    let ldim = r.matrix.nrows();
    if from.len() != ldim || to.len() != ldim {
        return Err(Error::DimensionMismatch {
            expected: ldim,
            found: from.len().max(to.len()),
        });
    }
    let (nf, nt) = (frobenius_norm(from), frobenius_norm(to));
    if nf == 0.0 || nt == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let image = &r.matrix * vectorize(from);
    Ok(vectorize(to).dotc(&image).re / (nf * nt))
}

/// The affine relaxation action `rho -> R (rho - rho_eq)`.
#[derive(Debug, Clone)]
pub struct ThermalizedRelaxation {
    pub r: Superoperator,
    pub rho_eq: DVector<C64>,
}

pub fn thermalized_action(
    r: &RelaxationSuperoperator,
    rho_eq: &Operator,
) -> Result<ThermalizedRelaxation> {
    if rho_eq.len() != r.matrix.nrows() {
        return Err(Error::DimensionMismatch {
            expected: r.matrix.nrows(),
            found: rho_eq.len(),
        });
    }
    Ok(ThermalizedRelaxation {
        r: r.matrix.clone(),
        rho_eq: vectorize(rho_eq),
    })
}

impl ThermalizedRelaxation {
    pub fn apply(&self, rho: &DVector<C64>) -> Result<DVector<C64>> {
        if rho.len() != self.rho_eq.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rho_eq.len(),
                found: rho.len(),
            });
        }
        Ok(&self.r * (rho - &self.rho_eq))
    }

    /// Constant source term `R vec(rho_eq)`.
    pub fn source(&self) -> DVector<C64> {
        &self.r * &self.rho_eq
    }
}

/// Total electron magnetic quantum number of a Zeeman basis state.
pub fn electron_projection(state: usize, n_spins: usize, n_electrons: usize) -> f64 {
    (0..n_electrons)
        .map(|k| {
            if (state >> (n_spins - 1 - k)) & 1 == 0 {
                0.5
            } else {
                -0.5
            }
        })
        .sum()
}

/// Electron coherence order of the column-stacked Liouville basis element `index`.
pub fn electron_coherence_order(index: usize, n_spins: usize, n_electrons: usize) -> i32 {
    let dim = 1 << n_spins;
    let (row, col) = (index % dim, index / dim);
    let order = electron_projection(row, n_spins, n_electrons)
        - electron_projection(col, n_spins, n_electrons);
    order.round() as i32
}

/// Keeps the elements of a laboratory-frame superoperator that survive the
/// transformation into the frame rotating with both electrons: those that
/// connect basis elements of equal electron coherence order. The rest
/// oscillate at multiples of the microwave frequency and average out.
pub fn rotating_frame_relaxation(
    r: &Superoperator,
    n_spins: usize,
    n_electrons: usize,
) -> Superoperator {
    let orders: Vec<i32> = (0..r.nrows())
        .map(|i| electron_coherence_order(i, n_spins, n_electrons))
        .collect();
    Superoperator::from_fn(r.nrows(), r.ncols(), |i, j| {
        if orders[i] == orders[j] {
            r[(i, j)]
        } else {
            c(0.0)
        }
    })
}

/// Projects an operator onto zero electron coherence order.
pub fn zero_coherence_part(op: &Operator, n_spins: usize, n_electrons: usize) -> Operator {
    let p: Vec<f64> = (0..op.nrows())
        .map(|s| electron_projection(s, n_spins, n_electrons))
        .collect();
    Operator::from_fn(op.nrows(), op.ncols(), |i, j| {
        if p[i] == p[j] {
            op[(i, j)]
        } else {
            c(0.0)
        }
    })
}
