//! Spin system parameterisation and its interaction list.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::constants::{bohr_angular, ANGSTROM, GAMMA_ELECTRON, GAMMA_PROTON, TWO_PI};
use crate::error::{Error, Result};
use crate::hamiltonian::{point_dipolar_tensor, tensor_from_eigs_euler};

/// Minimum allowed distance between any two spins, angstrom.
pub const MIN_DISTANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EulerConvention {
    /// Active rotation `Rz(a) Ry(b) Rz(c)`.
    Zyz,
    /// Active rotation `Rx(a) Ry(b) Rz(c)`.
    Xyz,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Electron {
    pub g_eigs: [f64; 3],
    /// Euler angles of the g-tensor, rad.
    pub g_euler: [f64; 3],
    /// Position, angstrom.
    pub coords: [f64; 3],
    /// Isotropic (contact) hyperfine coupling to the nucleus, Hz.
    pub iso_hyperfine_hz: f64,
}

/// A 1e1n or 2e1n spin system. Spin ordering is `(E1, N)` or `(E1, E2, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    pub electrons: Vec<Electron>,
    pub shift_eigs_ppm: [f64; 3],
    pub shift_euler: [f64; 3],
    pub nucleus_coords: [f64; 3],
    /// Nuclear magnetogyric ratio, rad/s/T.
    pub nucleus_gamma: f64,
    pub euler_convention: EulerConvention,
    /// Rotational correlation time, s.
    pub tau_c: f64,
    /// Inter-electron exchange coupling, Hz.
    pub exchange_hz: f64,
    /// Electron nutation frequency under the microwave drive, Hz.
    pub mw_nutation_hz: f64,
    /// Sample temperature, K.
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InteractionKind {
    /// g-tensor of electron `k` (0-based).
    ElectronZeeman(usize),
    /// Nuclear chemical shielding.
    NuclearZeeman,
    /// Hyperfine coupling of electron `k` to the nucleus.
    Hyperfine(usize),
    InterElectronDipolar,
}

impl InteractionKind {
    pub fn label(&self) -> String {
        match self {
            InteractionKind::ElectronZeeman(k) => format!("G{}", k + 1),
            InteractionKind::NuclearZeeman => "CSA".into(),
            InteractionKind::Hyperfine(k) => format!("HF{}", k + 1),
            InteractionKind::InterElectronDipolar => "DD".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Partner {
    /// Couples to the static field; tensor is in rad/s/T.
    Field,
    /// Couples to another spin; tensor is in rad/s.
    Spin(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub kind: InteractionKind,
    pub spin: usize,
    pub partner: Partner,
    pub tensor: Matrix3<f64>,
}

impl Interaction {
    /// Coupling tensor in rad/s; Zeeman tensors are multiplied by the field.
    pub fn tensor_at_field(&self, b0: f64) -> Matrix3<f64> {
        match self.partner {
            Partner::Field => self.tensor * b0,
            Partner::Spin(_) => self.tensor,
        }
    }

    pub fn rotated(&self, rotation: &Matrix3<f64>) -> Self {
        Self {
            tensor: rotation * self.tensor * rotation.transpose(),
            ..self.clone()
        }
    }
}

impl SpinSystem {
    pub fn n_electrons(&self) -> usize {
        self.electrons.len()
    }

    pub fn n_spins(&self) -> usize {
        self.electrons.len() + 1
    }

    pub fn nucleus_index(&self) -> usize {
        self.electrons.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSystem(m));
        if self.electrons.is_empty() || self.electrons.len() > 2 {
            return bad(format!(
                "{} electrons; 1 or 2 supported",
                self.electrons.len()
            ));
        }
        if !(self.tau_c > 0.0) || !self.tau_c.is_finite() {
            return bad(format!("tau_c must be positive, got {}", self.tau_c));
        }
        if !(self.temperature > 0.0) {
            return bad(format!(
                "temperature must be positive, got {}",
                self.temperature
            ));
        }
        let mut numbers = vec![self.exchange_hz, self.mw_nutation_hz, self.nucleus_gamma];
        numbers.extend(self.shift_eigs_ppm);
        numbers.extend(self.shift_euler);
        numbers.extend(self.nucleus_coords);
        for e in &self.electrons {
            numbers.extend(e.g_eigs);
            numbers.extend(e.g_euler);
            numbers.extend(e.coords);
            numbers.push(e.iso_hyperfine_hz);
        }
        if numbers.iter().any(|x| !x.is_finite()) {
            return bad("non-finite parameter".into());
        }
        let mut points = vec![self.nucleus_coords];
        points.extend(self.electrons.iter().map(|e| e.coords));
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let d = (Vector3::from(points[i]) - Vector3::from(points[j])).norm();
                if d <= MIN_DISTANCE {
                    return Err(Error::CoincidentPoints {
                        min_distance: MIN_DISTANCE,
                    });
                }
            }
        }
        Ok(())
    }

    /// g-tensor of electron `k`.
    pub fn g_tensor(&self, k: usize) -> Matrix3<f64> {
        let e = &self.electrons[k];
        tensor_from_eigs_euler(e.g_eigs, e.g_euler, self.euler_convention)
    }

    /// Electron Zeeman tensor, rad/s/T.
    pub fn electron_zeeman_tensor(&self, k: usize) -> Matrix3<f64> {
        self.g_tensor(k) * bohr_angular()
    }

    /// Nuclear Zeeman tensor `-gamma (1 + delta 1e-6)`, rad/s/T.
    pub fn nuclear_zeeman_tensor(&self) -> Matrix3<f64> {
        let shift =
            tensor_from_eigs_euler(self.shift_eigs_ppm, self.shift_euler, self.euler_convention);
        (Matrix3::identity() + shift * 1e-6) * (-self.nucleus_gamma)
    }

    /// Point-dipole hyperfine tensor plus the isotropic contact term, rad/s.
    pub fn hyperfine_tensor(&self, k: usize) -> Result<Matrix3<f64>> {
        let e = &self.electrons[k];
        let dipolar = point_dipolar_tensor(
            e.coords,
            self.nucleus_coords,
            GAMMA_ELECTRON,
            self.nucleus_gamma,
        )?;
        Ok(dipolar + Matrix3::identity() * (TWO_PI * e.iso_hyperfine_hz))
    }

    pub fn inter_electron_dipolar_tensor(&self) -> Result<Option<Matrix3<f64>>> {
        if self.electrons.len() < 2 {
            return Ok(None);
        }
        let t = point_dipolar_tensor(
            self.electrons[0].coords,
            self.electrons[1].coords,
            GAMMA_ELECTRON,
            GAMMA_ELECTRON,
        )?;
        Ok(Some(t))
    }

    /// Exchange coupling, rad/s.
    pub fn exchange_angular(&self) -> f64 {
        TWO_PI * self.exchange_hz
    }

    /// Every interaction of the system with its full (isotropic + anisotropic) tensor.
    pub fn interactions(&self) -> Result<Vec<Interaction>> {
        self.validate()?;
        let nucleus = self.nucleus_index();
        let mut list = Vec::new();
        for k in 0..self.n_electrons() {
            list.push(Interaction {
                kind: InteractionKind::ElectronZeeman(k),
                spin: k,
                partner: Partner::Field,
                tensor: self.electron_zeeman_tensor(k),
            });
        }
        list.push(Interaction {
            kind: InteractionKind::NuclearZeeman,
            spin: nucleus,
            partner: Partner::Field,
            tensor: self.nuclear_zeeman_tensor(),
        });
        for k in 0..self.n_electrons() {
            list.push(Interaction {
                kind: InteractionKind::Hyperfine(k),
                spin: k,
                partner: Partner::Spin(nucleus),
                tensor: self.hyperfine_tensor(k)?,
            });
        }
        if let Some(d) = self.inter_electron_dipolar_tensor()? {
            list.push(Interaction {
                kind: InteractionKind::InterElectronDipolar,
                spin: 0,
                partner: Partner::Spin(1),
                tensor: d,
            });
        }
        Ok(list)
    }

    /// Isotropic Zeeman angular frequency of electron `k` at field `b0`, rad/s.
    pub fn electron_frequency(&self, k: usize, b0: f64) -> f64 {
        self.electron_zeeman_tensor(k).trace() / 3.0 * b0
    }

    /// Isotropic nuclear Zeeman angular frequency, rad/s.
    pub fn nuclear_frequency(&self, b0: f64) -> f64 {
        self.nuclear_zeeman_tensor().trace() / 3.0 * b0
    }

    /// Distance from electron `k` to the nucleus, m.
    pub fn electron_nucleus_distance(&self, k: usize) -> f64 {
        (Vector3::from(self.electrons[k].coords) - Vector3::from(self.nucleus_coords)).norm()
            * ANGSTROM
    }
}

/// Default nuclear magnetogyric ratio.
pub fn proton_gamma() -> f64 {
    GAMMA_PROTON
}
