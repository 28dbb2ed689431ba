//! Interaction tensors and the laboratory-frame, microwave and rotating-frame
//! Hamiltonians. All Hamiltonians are in rad/s.
//!
//! In solution the anisotropic parts of every tensor average to zero under
//! rotational diffusion, so the coherent (static) Hamiltonian only carries
//! isotropic parts; the anisotropic remainder drives relaxation. The full
//! single-orientation Hamiltonian is available through
//! [`orientation_hamiltonian`].

use nalgebra::{Matrix3, Vector3};

use crate::constants::{ANGSTROM, HBAR, MU0_OVER_4PI};
use crate::error::{Error, Result};
use crate::spin::{c, identity, single_spin_operator, spin_vector, Axis, Operator, SpinLabel};
use crate::system::{EulerConvention, Interaction, Partner, SpinSystem, MIN_DISTANCE};

pub fn rotation_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rotation_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rotation_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn euler_rotation(angles: [f64; 3], convention: EulerConvention) -> Matrix3<f64> {
    let [a, b, g] = angles;
    match convention {
        EulerConvention::Zyz => rotation_z(a) * rotation_y(b) * rotation_z(g),
        EulerConvention::Xyz => rotation_x(a) * rotation_y(b) * rotation_z(g),
    }
}

/// `R diag(eigs) R^T` with `R` the active Euler rotation.
pub fn tensor_from_eigs_euler(
    eigs: [f64; 3],
    angles: [f64; 3],
    convention: EulerConvention,
) -> Matrix3<f64> {
    let r = euler_rotation(angles, convention);
    r * Matrix3::from_diagonal(&Vector3::from(eigs)) * r.transpose()
}

/// Point magnetic dipole coupling tensor `d (1 - 3 e e^T)`, rad/s, with
/// `d = (mu0/4pi) gamma1 gamma2 hbar / r^3`. Positions in angstrom.
pub fn point_dipolar_tensor(
    r1: [f64; 3],
    r2: [f64; 3],
    gamma1: f64,
    gamma2: f64,
) -> Result<Matrix3<f64>> {
    let v = (Vector3::from(r2) - Vector3::from(r1)) * ANGSTROM;
    let r = v.norm();
    if r < MIN_DISTANCE * ANGSTROM {
        return Err(Error::CoincidentPoints {
            min_distance: MIN_DISTANCE,
        });
    }
    let e = v / r;
    let d = MU0_OVER_4PI * gamma1 * gamma2 * HBAR / r.powi(3);
    Ok((Matrix3::identity() - e * e.transpose() * 3.0) * d)
}

/// Dipolar constant `(mu0/4pi) gamma1 gamma2 hbar / r^3`, rad/s.
pub fn dipolar_constant(r1: [f64; 3], r2: [f64; 3], gamma1: f64, gamma2: f64) -> f64 {
    let r = (Vector3::from(r2) - Vector3::from(r1)).norm() * ANGSTROM;
    MU0_OVER_4PI * gamma1 * gamma2 * HBAR / r.powi(3)
}

pub fn isotropic_part(t: &Matrix3<f64>) -> f64 {
    t.trace() / 3.0
}

/// `sum_ij T_ij L_i R_j` for operator vectors `L`, `R`.
fn bilinear(left: &[Operator; 3], tensor: &Matrix3<f64>, right: &[Operator; 3]) -> Operator {
    let dim = left[0].nrows();
    let mut h = Operator::zeros(dim, dim);
    for i in 0..3 {
        for j in 0..3 {
            if tensor[(i, j)] != 0.0 {
                h += (&left[i] * &right[j]) * c(tensor[(i, j)]);
            }
        }
    }
    h
}

fn linear(left: &[Operator; 3], tensor: &Matrix3<f64>, field: &Vector3<f64>) -> Operator {
    let dim = left[0].nrows();
    let mut h = Operator::zeros(dim, dim);
    let coupling = tensor * field;
    for i in 0..3 {
        if coupling[i] != 0.0 {
            h += &left[i] * c(coupling[i]);
        }
    }
    h
}

/// Operator of one interaction for a given field vector (tesla).
pub fn interaction_operator(
    n_spins: usize,
    interaction: &Interaction,
    field: &Vector3<f64>,
) -> Result<Operator> {
    let left = spin_vector(n_spins, interaction.spin)?;
    Ok(match interaction.partner {
        Partner::Field => linear(&left, &interaction.tensor, field),
        Partner::Spin(j) => bilinear(&left, &interaction.tensor, &spin_vector(n_spins, j)?),
    })
}

fn exchange_operator(sys: &SpinSystem) -> Result<Option<Operator>> {
    if sys.n_electrons() < 2 || sys.exchange_hz == 0.0 {
        return Ok(None);
    }
    let n = sys.n_spins();
    let j = Matrix3::identity() * sys.exchange_angular();
    Ok(Some(bilinear(&spin_vector(n, 0)?, &j, &spin_vector(n, 1)?)))
}

/// Rotationally averaged laboratory-frame Hamiltonian at field `b0` along z:
/// isotropic Zeeman terms, exchange and isotropic hyperfine couplings.
pub fn static_hamiltonian(sys: &SpinSystem, b0: f64) -> Result<Operator> {
    let n = sys.n_spins();
    let field = Vector3::new(0.0, 0.0, b0);
    let mut h = Operator::zeros(sys.dim(), sys.dim());
    for interaction in sys.interactions()? {
        let iso = Interaction {
            tensor: Matrix3::identity() * isotropic_part(&interaction.tensor),
            ..interaction
        };
        h += interaction_operator(n, &iso, &field)?;
    }
    if let Some(ex) = exchange_operator(sys)? {
        h += ex;
    }
    Ok(h)
}

/// Full Hamiltonian for one fixed molecular orientation with the field
/// vector `field` (tesla) given in the molecular frame.
pub fn orientation_hamiltonian(sys: &SpinSystem, field: &Vector3<f64>) -> Result<Operator> {
    orientation_hamiltonian_from(
        sys.n_spins(),
        &sys.interactions()?,
        exchange_operator(sys)?,
        field,
    )
}

pub fn orientation_hamiltonian_from(
    n_spins: usize,
    interactions: &[Interaction],
    exchange: Option<Operator>,
    field: &Vector3<f64>,
) -> Result<Operator> {
    let dim = 1 << n_spins;
    let mut h = exchange.unwrap_or_else(|| Operator::zeros(dim, dim));
    for interaction in interactions {
        h += interaction_operator(n_spins, interaction, field)?;
    }
    Ok(h)
}

/// Weights of the microwave coupling per electron, `Tr[Z_k] / Tr[Z_1]`.
fn drive_weights(sys: &SpinSystem) -> Vec<f64> {
    let reference = sys.electron_zeeman_tensor(0).trace();
    (0..sys.n_electrons())
        .map(|k| sys.electron_zeeman_tensor(k).trace() / reference)
        .collect()
}

/// Magnetic field amplitude of the laboratory-frame drive, tesla.
///
/// The nutation frequency `w1` is the amplitude of the cosine drive on
/// electron 1, `B1 Tr[Z1] / 3 = w1`, so `B1 = 3 w1 / Tr[Z1]`. Only the
/// co-rotating half, `w1 / 2`, survives in the rotating frame.
pub fn mw_field_amplitude(sys: &SpinSystem) -> f64 {
    let w1 = crate::constants::TWO_PI * sys.mw_nutation_hz;
    3.0 * w1 / sys.electron_zeeman_tensor(0).trace()
}

/// Laboratory-frame microwave term `cos(phase) B1/3 sum_k Tr[Z_k] Sx_k`.
pub fn mw_hamiltonian(sys: &SpinSystem, phase: f64) -> Result<Operator> {
    let n = sys.n_spins();
    let b1 = mw_field_amplitude(sys);
    let mut h = Operator::zeros(sys.dim(), sys.dim());
    for k in 0..sys.n_electrons() {
        let amplitude = phase.cos() * b1 / 3.0 * sys.electron_zeeman_tensor(k).trace();
        if amplitude != 0.0 {
            h += single_spin_operator(n, SpinLabel::electron(k), Axis::X)? * c(amplitude);
        }
    }
    Ok(h)
}

/// Truncation of the inter-electron coupling in the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ElectronCoupling {
    /// Both electrons rotate at one frequency and are treated as like spins:
    /// the full isotropic `J S1.S2` is retained.
    #[default]
    LikeSpin,
    /// Only the `J Sz1 Sz2` part is retained.
    Secular,
}

/// First-order average Hamiltonian in the frame rotating at `omega_mw` about
/// the z axes of both electrons, with the drive under the rotating-wave
/// approximation.
pub fn rotating_frame_hamiltonian(
    sys: &SpinSystem,
    b0: f64,
    omega_mw: f64,
    coupling: ElectronCoupling,
) -> Result<Operator> {
    sys.validate()?;
    let n = sys.n_spins();
    let nucleus = sys.nucleus_index();
    let mut h = Operator::zeros(sys.dim(), sys.dim());
    for k in 0..sys.n_electrons() {
        let offset = sys.electron_frequency(k, b0) - omega_mw;
        h += single_spin_operator(n, SpinLabel::electron(k), Axis::Z)? * c(offset);
    }
    h += single_spin_operator(n, SpinLabel::nucleus(nucleus), Axis::Z)?
        * c(sys.nuclear_frequency(b0));

    if sys.n_electrons() == 2 && sys.exchange_hz != 0.0 {
        let j = sys.exchange_angular();
        let [x1, y1, z1] = spin_vector(n, 0)?;
        let [x2, y2, z2] = spin_vector(n, 1)?;
        h += (&z1 * &z2) * c(j);
        if coupling == ElectronCoupling::LikeSpin {
            h += (&x1 * &x2 + &y1 * &y2) * c(j);
        }
    }

    // secular and pseudosecular hyperfine: Sz_E (A_zx Ix + A_zy Iy + A_zz Iz)
    let nuc = spin_vector(n, nucleus)?;
    for k in 0..sys.n_electrons() {
        let a = Matrix3::identity() * isotropic_part(&sys.hyperfine_tensor(k)?);
        let sz = single_spin_operator(n, SpinLabel::electron(k), Axis::Z)?;
        for j in 0..3 {
            if a[(2, j)] != 0.0 {
                h += (&sz * &nuc[j]) * c(a[(2, j)]);
            }
        }
    }

    let w1 = 0.5 * crate::constants::TWO_PI * sys.mw_nutation_hz;
    for (k, weight) in drive_weights(sys).into_iter().enumerate() {
        if w1 != 0.0 {
            h += single_spin_operator(n, SpinLabel::electron(k), Axis::X)? * c(w1 * weight);
        }
    }
    Ok(h)
}

/// Identity-sized zero operator helper for callers assembling sums.
pub fn zero_operator(sys: &SpinSystem) -> Operator {
    identity(sys.dim()) * c(0.0)
}
